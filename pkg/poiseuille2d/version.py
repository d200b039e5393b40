from __future__ import annotations

version: str = '0.1.0'
