"""
pta_unet tests package
"""
