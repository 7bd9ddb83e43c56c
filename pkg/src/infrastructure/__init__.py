"""
Infrastructure layer - Dataset and checkpoint files, config loading, reports, logging
"""
