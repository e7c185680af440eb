"""
Test suite for ProxRecon.
""" 