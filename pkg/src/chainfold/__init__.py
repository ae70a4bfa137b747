"""Reconfiguration of polygonal chains: straightening, convexification and locked examples."""
