"""
Algebra and file-format logic for ceforge
"""
