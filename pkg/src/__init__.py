"""Carnot-group calculus, curve surgery and the shortening pipeline."""
