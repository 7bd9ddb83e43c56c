"""
Core layer - Domain logic and algorithms
"""
