"""Tests for the tvflow package."""
