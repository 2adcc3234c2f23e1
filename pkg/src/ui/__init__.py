"""
Text reports for the ceforge command line
"""
