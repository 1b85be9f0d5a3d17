"""
Test suite for the FBNR-PLIC toolkit.
"""
