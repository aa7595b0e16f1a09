// Prompt templates. The event-proposal, property-proposal and edge-selection
// texts follow the published prompts; list-valued placeholders were renamed
// to single identifiers ({effect}, {candidate_values}).
#include "regen/oracle.hpp"

namespace regen {
namespace {

constexpr std::string_view kEventProposal =
    R"(You are an expert in driving scenarios.

In this scenario there is {causal_graph}. 

Please provide a list of all the plausible scenarios that caused {effect}. Make sure it is precise. Provide the final answer as a comprehensive list of plausible scenarios in the following format within the tags <Answer>...</Answer>:
    
    - cause_name: cause description

Answer: Let's think step by step.)";

constexpr std::string_view kEventProposalPrior =
    R"(You are an expert in driving scenarios.

In this scenario there is {causal_graph}. 
Take the following context into account: {prior}

Please provide a list of all the plausible scenarios that caused {effect}. Make sure it is precise. Provide the final answer as a comprehensive list of plausible scenarios in the following format within the tags <Answer>...</Answer>:
    
    - cause_name: cause description

Answer: Let's think step by step.)";

constexpr std::string_view kPropertyProposal =
    R"(You are an expert in driving scenarios.

In this scenario there is {causal_graph}. The entities in the scenario are: 
{entities_name}

Please provide a list of all the possible {node_name}s for the entities in the scenario, excluding the ego-vehicle. Make sure it is precise. Provide the final answer as a comprehensive list of possible {node_name}s in the following format within the tags <Answer>...</Answer>:
    
    - entity_name: ['{node_name}1', '{node_name}2', ...]

Answer: Let's think step by step.)";

constexpr std::string_view kEdgeSelection =
    R"(You are an expert in driving scenarios.

In this scenario there is {causal_graph}. The entities in the scenario are: 
{entities_name}

The possible {node_name}s for each entity are:
{candidate_values}

What are all the possible {node_name}s for each entity in the scenario? To answer this, first, please summarize the details of each entities in the scenario. Then, check each to see if it is the possible outcome given what is known. For each, start by stating everything that is known about all the entities, then check if it is plausible given what is known, finally give your conclusion. Think step by step. You must not assume additional actions beyond what is explicitly described in the behavior. You must also assume that the actions are executed fully. Your evaluation needs to be in the following format:

1. **Name of {node_name}**
- Known:
- Analysis: (think step by step)
- Contradictions to what is known: (think step by step)
- Conclusion:

Finally, provide the final answer as a list of locations in the following formats within the tags <Answer>...</Answer>.
- entity_name: ['{node_name}1', '{node_name}2', ...]

Here are some tips to help you answer the question:
- You may assume that the vehicles can break traffic rules as long as it is plausible in real life (realistic). However, the vehicles action must not violate the behavior described.
- The {node_name}s selected can only be from the list of possible {node_name}s provided.

Answer: Let's think step by step.)";

constexpr std::string_view kEventEdgeSelection =
    R"(You are an expert in driving scenarios.

In this scenario there is {causal_graph}.

The candidate causes of "{effect}" are:
{candidates}

Which candidates could directly cause "{effect}"? For each candidate, state what is known, check whether the causal link is plausible in real life, and give your conclusion. Discard every candidate whose link to "{effect}" is implausible.

Finally, provide the final answer in the following format within the tags <Answer>...</Answer>:
- chosen: ['cause_name1', 'cause_name2', ...]

Answer: Let's think step by step.)";

constexpr std::string_view kEntityEdgeSelection =
    R"(You are an expert in driving scenarios.

In this scenario there is {causal_graph}.

The simulator supports the following entities:
{candidates}

Which of these entities are directly involved in the event "{event}"? Select only entities that the simulator can use to reproduce the event. If no entity can reproduce it, return an empty list.

Finally, provide the final answer in the following format within the tags <Answer>...</Answer>:
- chosen: ['entity_name1', 'entity_name2', ...]

Answer: Let's think step by step.)";

constexpr std::string_view kGrounding =
    R"(You are an expert in driving scenarios.

In this scenario there is {causal_graph}. The entities in the scenario are:
{entities}

The available predicates are:
{predicates}

Define the abstract states needed to track this scenario. Every abstract state belongs to one entity and is a conjunction (and) or disjunction (or) of the available predicates. Then order the abstract states into a finite state machine: a list of stages, where all (entity, state) pairs of a stage must hold at the same time and the stages must be reached in order. The last stage is the terminal condition of the scenario.

Provide the final answer in the following format within the tags <Answer>...</Answer>:
states:
- entity_name | State Name | predicate(entity_name, ...) and predicate(...)
fsm:
- [('entity_name', 'State Name'), ...]

Answer: Let's think step by step.)";

constexpr std::pair<TemplateId, std::string_view> kIds[] = {
    {TemplateId::kEventProposal, "event_proposal"},
    {TemplateId::kEventProposalPrior, "event_proposal_prior"},
    {TemplateId::kPropertyProposal, "property_proposal"},
    {TemplateId::kEdgeSelection, "edge_selection"},
    {TemplateId::kEventEdgeSelection, "event_edge_selection"},
    {TemplateId::kEntityEdgeSelection, "entity_edge_selection"},
    {TemplateId::kGrounding, "grounding"},
};

}  // namespace

std::string_view to_string(TemplateId id) {
  for (const auto& [k, name] : kIds) {
    if (k == id) return name;
  }
  return "unknown";
}

std::optional<TemplateId> parse_template_id(std::string_view text) {
  for (const auto& [k, name] : kIds) {
    if (name == text) return k;
  }
  return std::nullopt;
}

std::string_view template_text(TemplateId id) {
  switch (id) {
    case TemplateId::kEventProposal: return kEventProposal;
    case TemplateId::kEventProposalPrior: return kEventProposalPrior;
    case TemplateId::kPropertyProposal: return kPropertyProposal;
    case TemplateId::kEdgeSelection: return kEdgeSelection;
    case TemplateId::kEventEdgeSelection: return kEventEdgeSelection;
    case TemplateId::kEntityEdgeSelection: return kEntityEdgeSelection;
    case TemplateId::kGrounding: return kGrounding;
  }
  return {};
}

}  // namespace regen
