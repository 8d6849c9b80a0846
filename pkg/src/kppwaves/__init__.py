"""Travelling waves of Fisher-KPP equations with density-dependent diffusion."""
