"""
Test suite per iosuav.

Struttura:
- unit/: Test unitari per singoli moduli
- integration/: Test end-to-end della CLI su scenari ridotti
"""
