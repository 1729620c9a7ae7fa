"""Typing diagnostics shared by both checkers."""

from __future__ import annotations

KINDS = frozenset({
    "unbound-var", "mismatch", "not-arrow", "not-forall", "ftv-escape",
    "mode-violation", "occurs-check", "not-closed", "not-plain",
    "not-reset-wrapped", "ambiguous",
})


class TypingError(Exception):
    """A term or context rejected by a typechecker.

    ``kind`` is one of ``KINDS``.  ``node`` is the offending subterm or
    context; its rendering is deferred until the error is printed.
    """

    def __init__(self, kind: str, message: str, node=None, expected=None, actual=None):
        assert kind in KINDS, kind
        super().__init__(kind, message)
        self.kind = kind
        self.message = message
        self.node = node
        self.expected = expected
        self.actual = actual

    @property
    def location(self):
        if self.node is None:
            return None
        from .surface import pretty

        s = pretty(self.node)
        return s if len(s) <= 120 else s[:117] + "..."

    def __str__(self) -> str:
        from .surface import pretty

        out = f"{self.kind}: {self.message}"
        if self.expected is not None:
            out += f"\n  expected: {pretty(self.expected)}"
        if self.actual is not None:
            out += f"\n  actual:   {pretty(self.actual)}"
        if self.node is not None:
            out += f"\n  in: {self.location}"
        return out
