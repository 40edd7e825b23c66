"""Analyzer modules: language, semantics, engines and reports"""
