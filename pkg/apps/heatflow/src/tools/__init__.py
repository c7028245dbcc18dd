# MCP tool handlers
