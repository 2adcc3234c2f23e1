"""
Utility functions and classes for ceforge
"""
