"""
Plotting of hierarchy sweep results
"""
