"""Workbench for System F with abortive and delimited control operators."""

from .syntax import ALL_MODES, CalcMode, Calculus, Strategy

__all__ = ["ALL_MODES", "CalcMode", "Calculus", "Strategy"]
