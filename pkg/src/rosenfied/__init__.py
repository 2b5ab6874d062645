"""Fiedler pencils for Rosenbrock system matrices."""
