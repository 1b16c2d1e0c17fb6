"""Simulation and analysis of a microfluidic molecular-communication link
with a graphene field-effect biosensor receiver."""

__version__ = "0.1.0"
