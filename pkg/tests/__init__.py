"""
DAG-WGAN Studio - Tests Package
"""
