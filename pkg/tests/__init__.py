"""Tests package for KANFED."""
