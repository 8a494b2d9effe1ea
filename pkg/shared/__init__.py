"""Shared code for all services"""
