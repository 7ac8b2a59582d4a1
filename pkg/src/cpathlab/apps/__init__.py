"""Application interfaces for cpathlab."""
