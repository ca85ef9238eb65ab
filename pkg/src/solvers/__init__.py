"""
Block SDP solvers and SDPA export
"""
