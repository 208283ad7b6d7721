"""Paper-style figures from toricmem CSV files.

Strictly a presentation layer: it validates the CSV schemas, reads the
numbers, and draws. No physics is recomputed here; legend text is taken
byte-for-byte from the input files.
"""

__version__ = "0.1.0"
