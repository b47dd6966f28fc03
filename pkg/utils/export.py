"""
Export utility for simulation results.
CSV tables (stdout or file) and a styled multi-sheet Excel workbook.
"""

import logging
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import openpyxl
import pandas as pd
from openpyxl.styles import Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter

logger = logging.getLogger(__name__)

# Enough digits for every double to read back unchanged
FLOAT_FORMAT = '%.17g'


def write_csv(table: pd.DataFrame, path: Optional[Union[str, Path]] = None) -> None:
    """Write a table as LF-terminated CSV to path, or to stdout when path is None"""
    if path is None:
        table.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"CSV written: {path} ({len(table)} rows)")


def _write_sheet(wb, title: str, table: pd.DataFrame, header_fill, header_font, border) -> None:
    ws = wb.create_sheet(title[:31])

    # Headers
    for col, header in enumerate(table.columns, 1):
        cell = ws.cell(row=1, column=col, value=str(header))
        cell.fill = header_fill
        cell.font = header_font
        cell.border = border

    # Data
    for row_idx, row in enumerate(table.itertuples(index=False), 2):
        for col, value in enumerate(row, 1):
            if isinstance(value, float) and value != value:
                value = None
            elif hasattr(value, 'item'):
                value = value.item()
            cell = ws.cell(row=row_idx, column=col, value=value)
            cell.border = border

    # Adjust column widths
    for col, header in enumerate(table.columns, 1):
        ws.column_dimensions[get_column_letter(col)].width = max(12, len(str(header)) + 4)
    ws.freeze_panes = 'A2'


def export_to_excel(sheets: Dict[str, pd.DataFrame], path: Union[str, Path],
                    metadata: Optional[Sequence[Sequence]] = None) -> Path:
    """One styled sheet per table, plus an optional Field/Value 'Run' sheet first"""
    wb = openpyxl.Workbook()
    wb.remove(wb.active)  # Remove default sheet

    # Define styles
    header_fill = PatternFill(start_color="1F77B4", end_color="1F77B4", fill_type="solid")
    header_font = Font(bold=True, color="FFFFFF")
    border = Border(
        left=Side(style='thin'),
        right=Side(style='thin'),
        top=Side(style='thin'),
        bottom=Side(style='thin')
    )

    if metadata:
        meta = pd.DataFrame([list(row) for row in metadata], columns=['Field', 'Value'])
        _write_sheet(wb, "Run", meta.astype({'Value': str}), header_fill, header_font, border)
    for title, table in sheets.items():
        _write_sheet(wb, title, table, header_fill, header_font, border)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wb.save(path)
    logger.info(f"Excel file exported: {path}")
    return path
