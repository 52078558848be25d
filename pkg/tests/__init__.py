"""fabsim v1.0 測試套件"""
