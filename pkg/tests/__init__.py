"""
Test suite for UniDA3D
"""
