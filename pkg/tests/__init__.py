# Test package initialization
"""
ptaunet command-line tests package
"""
