# qghalfspace - Command Line Package

"""
Argument parsing, subcommand routing and run handlers.
"""
