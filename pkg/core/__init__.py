# qghalfspace - Core Package

"""
Grid, fields, differential operators, elliptic solves and the weighted Hodge decomposition.
"""
