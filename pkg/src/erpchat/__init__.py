"""Conversational natural-language-to-SQL agent system for ERP databases."""

__version__ = "0.1.0"
