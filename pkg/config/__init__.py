# qghalfspace - Configuration Package

"""
Runtime settings, run-file parsing and named simulation recipes.
"""
