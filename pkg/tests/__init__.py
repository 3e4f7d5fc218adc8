"""lbrxVoicePro test suite"""