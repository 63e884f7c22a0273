"""
Learning-to-Rank Generalization Workbench
- Surrogate ranking losses with l-inf Lipschitz and smoothness constants
- Trainers, bound calculators and numerical verification suites
- Synthetic and LETOR data, CSV experiment output
"""

import sys

from src.app.cli import main

# =============================================================================
# Entry Point: Command Line
# =============================================================================

if __name__ == "__main__":
    sys.exit(main())
