"""
Learning-to-Rank Generalization Workbench
Main package initialization
"""
