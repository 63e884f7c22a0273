"""
Learning-to-Rank Generalization Workbench
Lab module - numerical oracles and verification suites.

Submodules:
    oracles     - finite differences, Lipschitz sampling, operator norms, inequality checks
    rademacher  - Monte-Carlo and exhaustive empirical Rademacher complexity
    suites      - VerificationSuite (runs every check for one loss)
"""
