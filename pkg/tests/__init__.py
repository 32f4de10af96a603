"""Test suite for the CACAO/BPMN converter."""
