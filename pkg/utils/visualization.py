# utils/visualization.py

from typing import Dict, Optional

import pandas as pd
from great_tables import GT


def ratio_bar(ratio: float, largest: float, passed: bool, max_width: int = 100, height: int = 14) -> str:
    """Bar of ratio / largest, clamped to [0, 1]; green when the kind stabilised."""
    if pd.isna(ratio) or pd.isna(largest) or largest <= 0:
        share = 0.0
    else:
        share = min(max(ratio / largest, 0.0), 1.0)
    colour = "#2e7d32" if passed else "#c62828"
    return (
        f'<div style="width:{max_width}px;background-color:#e0e0e0;">'
        f'<div style="height:{height}px;width:{round(share * max_width)}px;background-color:{colour};"></div>'
        f'</div>'
    )


def render_sweep_table(sweep_df: pd.DataFrame, verdicts: Optional[Dict[str, bool]] = None) -> str:
    """HTML summary of a sweep: implied constants per kind and grid, with a bar
    scaled to the largest ratio of the kind."""
    data = sweep_df.copy()
    data["grid"] = data["grid_nx"].astype(str) + "x" + data["grid_ny"].astype(str)
    verdicts = verdicts or {}
    passed = data["kind"].map(lambda k: verdicts.get(k, True))
    largest = data.groupby("kind")["ratio"].transform("max")
    data["ratio_bar"] = [ratio_bar(r, m, ok) for r, m, ok in zip(data["ratio"], largest, passed)]
    data["verdict"] = passed.map({True: "pass", False: "FAIL"})

    cols_to_keep = ["kind", "grid", "ratio_bar", "ratio", "left", "right", "verdict"]
    data = data[cols_to_keep]

    gt_tbl = (
        GT(data)
        .tab_header(title="Implied constants under refinement")
        .fmt_scientific(["left", "right"], decimals=3)
        .fmt_number("ratio", decimals=4)
        .cols_width(ratio_bar="100px", ratio="80px", left="100px", right="100px")
        .cols_align(align="left", columns=["kind", "grid"])
        .cols_align(align="center", columns=["ratio_bar", "ratio", "left", "right", "verdict"])
        .tab_spanner(label="Implied constant", columns=["ratio_bar", "ratio"])
        .tab_spanner(label="Estimate sides", columns=["left", "right"])
        .cols_label(
            kind="Estimate",
            grid="Grid",
            ratio_bar="",
            ratio="left / right",
            left="Left side",
            right="Right side",
            verdict="Stabilised",
        )
        .tab_options(
            column_labels_font_weight="bold",
            table_font_size="14px",
            heading_background_color="white",
            column_labels_background_color="white",
            table_background_color="white",
        )
    )
    return gt_tbl.as_raw_html()
