"""Workbench: configuration, snapshot I/O, CLI orchestration."""
