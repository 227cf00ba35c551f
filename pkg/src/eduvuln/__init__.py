"""Municipality-level academic-vulnerability pipeline.

Aggregates student, connectivity, and census tables into covariables,
trains three classifiers against a statistical risk threshold, fuses
their votes into a four-level vulnerability score, and answers minimal
intervention queries.
"""

__version__ = "0.1.0"
