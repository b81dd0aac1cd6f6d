"""Datasets, file formats, experiment pipelines and the command-line interface."""
