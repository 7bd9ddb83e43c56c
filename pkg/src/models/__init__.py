"""
Models layer - Data models and entities
"""
