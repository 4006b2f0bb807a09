"""Per-n result records shared by every truncated limit computation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

CSV_HEADER = ("quantity", "coeffs", "n", "V", "value", "stderr", "certified", "mode", "seconds")


@dataclass
class SeriesRecord:
    n: int
    value: float
    stderr: float = 0.0
    certified: bool = True
    mode: str = "exact"
    seconds: float = 0.0
    V: int | None = None
    note: str = ""


@dataclass
class TruncationSeries:
    """Values ``a_n`` of a subset-averaged quantity at finitely many ``n``.

    ``approximate`` is set when an ingredient over-approximates (d=2
    locally admissible languages, uncertified minimizations).
    """

    quantity: str
    coeffs: str
    records: list[SeriesRecord] = field(default_factory=list)
    approximate: bool = False
    errors: list[str] = field(default_factory=list)

    def add(self, record: SeriesRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, n: int) -> SeriesRecord:
        for r in self.records:
            if r.n == n:
                return r
        raise KeyError(n)

    @property
    def ns(self) -> list[int]:
        return [r.n for r in self.records]

    @property
    def values(self) -> list[float]:
        return [r.value for r in self.records]

    @property
    def certified(self) -> bool:
        return all(r.certified for r in self.records)

    def final(self) -> tuple[float | None, float | None]:
        """Last value and Cauchy gap ``|a_n - a_{n-2}|`` (None when unavailable)."""
        if not self.records:
            return None, None
        last = self.records[-1]
        gap = None
        if len(self.records) >= 3:
            gap = abs(last.value - self.records[-3].value)
        return last.value, gap

    def rows(self, scale: float = 1.0) -> list[tuple]:
        return [
            (self.quantity, self.coeffs, r.n, "" if r.V is None else r.V,
             repr(r.value * scale), repr(r.stderr * scale), int(r.certified), r.mode,
             f"{r.seconds:.6f}")
            for r in self.records
        ]

    def to_dict(self, scale: float = 1.0) -> dict:
        last, gap = self.final()
        recs = []
        for r in self.records:
            d = asdict(r)
            d["value"] *= scale
            d["stderr"] *= scale
            recs.append(d)
        return {
            "quantity": self.quantity,
            "coeffs": self.coeffs,
            "approximate": self.approximate,
            "records": recs,
            "final": {"value": None if last is None else last * scale,
                      "cauchy_gap": None if gap is None else gap * scale},
            "errors": list(self.errors),
        }
