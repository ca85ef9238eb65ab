"""
Dense reference constructions and the seesaw lower bound
"""
