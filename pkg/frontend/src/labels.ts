/** Plain-language names for the model's feature ids, for instructors. */

const FEATURE_LABELS: Record<string, string> = {
  avg_commands_per_task: "Average commands typed per task",
  min_commands_per_task: "Fewest commands on any task",
  max_commands_per_task: "Most commands on any task",
  commands_per_minute: "Commands typed per minute",
  longest_command_repeat: "Longest streak repeating one command",
  mean_command_gap_seconds: "Average pause between commands (seconds)",
  avg_unique_tools_per_task: "Average distinct tools used per task",
  min_unique_tools_per_task: "Fewest distinct tools on any task",
  max_unique_tools_per_task: "Most distinct tools on any task",
  unique_tools_per_minute: "New tools tried per minute",
  longest_tool_repeat: "Longest streak staying on one tool",
  mean_tool_change_gap_seconds: "Average time between tool switches (seconds)",
  solution_display_ratio: "Share of tasks where the solution was revealed",
  solution_in_first_half: "Revealed a solution in the first half of the exercise",
  solutions_on_consecutive_tasks: "Revealed solutions on back-to-back tasks",
  min_seconds_to_solution_display: "Shortest wait before revealing a solution (seconds)",
  avg_wrong_answers_per_task: "Average wrong answers per task",
  max_consecutive_wrong_answers: "Longest run of wrong answers in a row",
  mean_answer_gap_seconds: "Average time between answer submissions (seconds)",
  avg_seconds_to_first_answer: "Average time until the first answer on a task (seconds)",
  min_seconds_to_first_answer: "Fastest first answer on any task (seconds)",
  max_seconds_to_first_answer: "Slowest first answer on any task (seconds)",
  avg_seconds_to_correct_answer: "Average time until the correct answer (seconds)",
  min_seconds_to_correct_answer: "Fastest correct answer on any task (seconds)",
  max_seconds_to_correct_answer: "Slowest correct answer on any task (seconds)",
  avg_unique_commands_per_task: "Average distinct commands per task",
  min_unique_commands_per_task: "Fewest distinct commands on any task",
  max_unique_commands_per_task: "Most distinct commands on any task",
  avg_errors_per_task: "Average command errors per task",
  max_errors_per_task: "Most command errors on any task",
  avg_seconds_to_completion: "Average time to finish a task (seconds)",
  min_seconds_to_completion: "Fastest task completion (seconds)",
  max_seconds_to_completion: "Slowest task completion (seconds)",
  mean_completion_gap_seconds: "Average time between task completions (seconds)",
};

/** Fallback for ids the table does not know: de-snake and capitalize. */
function prettify(featureId: string): string {
  const words = featureId.split("_").join(" ");
  return words.charAt(0).toUpperCase() + words.slice(1);
}

export function describeFeature(featureId: string): string {
  return FEATURE_LABELS[featureId] ?? prettify(featureId);
}

export function knownFeatureIds(): string[] {
  return Object.keys(FEATURE_LABELS);
}
