"""
Services layer - Training, sampling, pseudo-labeling and task orchestration
"""
