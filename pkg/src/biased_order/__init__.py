"""Biased convex order for finitely-atomic measures on the real line."""
