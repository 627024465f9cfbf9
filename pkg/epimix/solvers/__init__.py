"""Non-negative ridge, annealing and simplex solvers."""
