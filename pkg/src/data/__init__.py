"""
Learning-to-Rank Generalization Workbench
Data module initialization - synthetic generation and LETOR files
"""
