# qghalfspace - Services Package

"""
Time integration, the SQG reduction, diagnostics and run persistence.
"""
