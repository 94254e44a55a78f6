"""Regenerate the coefficient field files shipped under configs/fields/.

The shipped run configs drive two mirrored linear source ramps,
g1(x) = 8(1-x) and g2(x) = 8x, sampled at cell centers.  Values are exact
dyadics, so the text round-trip reproduces them bit-for-bit.
"""

from __future__ import annotations

from pathlib import Path

from phasemin.grid import cell_centers, make_field, make_grid, save_field

FIELD_DIR = Path(__file__).resolve().parent.parent / "configs" / "fields"


def write_ramps(grid, suffix: str) -> None:
    x = cell_centers(grid)[..., 0]
    save_field(make_field(grid, 8.0 * (1.0 - x)), FIELD_DIR / f"g1_{suffix}.txt")
    save_field(make_field(grid, 8.0 * x), FIELD_DIR / f"g2_{suffix}.txt")


def main() -> None:
    FIELD_DIR.mkdir(parents=True, exist_ok=True)
    write_ramps(make_grid(2, (128, 128), 1.0 / 128), "2d_h128")
    write_ramps(make_grid(1, (256,), 1.0 / 256), "1d_h256")


if __name__ == "__main__":
    main()
