"""gazeguard: gaze-driven visual aid simulator"""
