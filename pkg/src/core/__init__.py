"""
Learning-to-Rank Generalization Workbench
Core module initialization - ranking primitives, surrogate losses, trainers
and bound calculators
"""
