"""
Test package for the Student Platform API.
"""
