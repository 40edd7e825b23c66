"""HTTP API for the analyzer"""
