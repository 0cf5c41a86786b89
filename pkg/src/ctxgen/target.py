"""Target machine description.

Sizes of integer kinds, the pointer width and the naming scheme of the
nondeterminism primitives are not fixed by the input language; they are
configuration.  The default matches a 32-bit ABI where ``unsigned long``
is 4 bytes wide and ``size_t`` is an alias of ``unsigned int``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

FRAMAC = "framac"
GENERIC = "generic"

# kind name -> (signed, width key).  Width keys are resolved against the
# per-config width table so --int-width/--long-width can retarget them.
_KINDS: dict[str, tuple[bool, str]] = {
    "char": (True, "char"),
    "signed char": (True, "char"),
    "unsigned char": (False, "char"),
    "short": (True, "short"),
    "unsigned short": (False, "short"),
    "int": (True, "int"),
    "unsigned int": (False, "int"),
    "long": (True, "long"),
    "unsigned long": (False, "long"),
    "long long": (True, "long long"),
    "unsigned long long": (False, "long long"),
    "size_t": (False, "int"),
}

# Spelled-out kind used for primitive names, e.g. size_t reuses the
# unsigned int nondeterminism builtin.
_BUILTIN_ALIAS = {"size_t": "unsigned int", "signed char": "char"}


@dataclass(frozen=True)
class TargetConfig:
    """Widths and naming knobs for one compilation.

    ``widths`` maps width keys (char/short/int/long/long long) to byte
    counts.  ``prefix`` is prepended to every fresh name the generator
    invents, so generated identifiers never collide with the target's.
    """

    widths: dict[str, int] = field(
        default_factory=lambda: {
            "char": 1,
            "short": 2,
            "int": 4,
            "long": 4,
            "long long": 8,
        }
    )
    ptr_width: int = 4
    prefix: str = "cfp_"
    style: str = FRAMAC

    def has_kind(self, name: str) -> bool:
        return name in _KINDS

    def is_signed(self, name: str) -> bool:
        return _KINDS[name][0]

    def kind_width(self, name: str) -> int:
        return self.widths[_KINDS[name][1]]

    def kind_bounds(self, name: str) -> tuple[int, int]:
        """Inclusive representable range of an integer kind."""
        bits = 8 * self.kind_width(name)
        if self.is_signed(name):
            return -(1 << (bits - 1)), (1 << (bits - 1)) - 1
        return 0, (1 << bits) - 1

    def builtin_kind(self, name: str) -> str:
        """Kind spelling used to name the nondeterminism primitive."""
        return _BUILTIN_ALIAS.get(name, name)

    def interval_builtin(self, kind: str) -> str:
        tau = self.builtin_kind(kind).replace(" ", "_")
        if self.style == GENERIC:
            return "ctxgen_range_" + tau
        return "Frama_C_" + tau + "_interval"

    def make_unknown_builtin(self) -> str:
        if self.style == GENERIC:
            return "ctxgen_make_unknown"
        return "Frama_C_make_unknown"

    def with_overrides(
        self,
        int_width: int | None = None,
        long_width: int | None = None,
        ptr_width: int | None = None,
        prefix: str | None = None,
        style: str | None = None,
    ) -> "TargetConfig":
        widths = dict(self.widths)
        if int_width is not None:
            widths["int"] = int_width
        if long_width is not None:
            widths["long"] = long_width
        return replace(
            self,
            widths=widths,
            ptr_width=self.ptr_width if ptr_width is None else ptr_width,
            prefix=self.prefix if prefix is None else prefix,
            style=self.style if style is None else style,
        )


DEFAULT_CONFIG = TargetConfig()
