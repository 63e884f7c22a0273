"""
Learning-to-Rank Generalization Workbench
Application module initialization
"""
