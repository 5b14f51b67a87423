#pragma once

#include "sciagent/agents.hpp"

namespace sciagent::detail {

// Node builders used by build_workflow. Each returns its entry node and
// leaves for `exit` when done.
NodeId add_planning_nodes(AgentGraph& graph, const AgentServices& services, const NodeId& exit);
NodeId add_execution_nodes(AgentGraph& graph, const AgentServices& services, const NodeId& exit);
NodeId add_research_nodes(AgentGraph& graph, const AgentServices& services, const NodeId& exit);
NodeId add_hypothesizer_nodes(AgentGraph& graph, const AgentServices& services, const NodeId& exit);
NodeId add_arxiv_nodes(AgentGraph& graph, const AgentServices& services, const NodeId& exit);

/// Input text for the current stage: data["task"] when a previous stage
/// handed one over, else the original query.
std::string stage_input(const RunState& state);

/// Moves the current conversation to data["archive"][stage] and clears it.
void begin_stage(RunState& state, const std::string& stage);

/// [system, user input] + steering messages.
std::vector<ChatMessage> opening(const std::string& system_prompt, const std::string& input, const RunState& state);

std::filesystem::path workspace_of(const RunState& state);

/// Names from `wanted` that the registry actually provides.
std::vector<std::string> available_tools(const ToolRegistry* registry, const std::vector<std::string>& wanted);

const ToolRegistry& registry_or_empty(const ToolRegistry* registry);

}  // namespace sciagent::detail
