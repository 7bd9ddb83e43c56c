"""
UniDA3D - Cross-modal domain adaptation for 2D/3D semantic segmentation

Main package entry point.
"""

__version__ = "0.1.0"
__author__ = "UniDA3D Team"
