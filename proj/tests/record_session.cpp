// Records a session fixture: the worked case, a 100-message request
// transcript, its replies and the final get_state output.
//
//   record_session <dir>

#include <fstream>
#include <iostream>

#include "session_transcript.hpp"
#include "test_support.hpp"

int main(int argc, char** argv) {
  namespace fp = fluoroplan;
  if (argc != 2) {
    std::cerr << "usage: record_session <dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);
  fp::testing::write_worked_case(dir);

  fp::ServiceOptions opts;
  opts.case_root = dir;
  fp::Session session(opts);
  std::ofstream requests(dir / "transcript.ndjson"), replies(dir / "replies.ndjson");
  for (const auto& msg : fp::testing::generate_transcript(2024, 100)) {
    requests << msg.dump() << "\n";
    replies << session.handle(msg).dump() << "\n";
  }
  std::ofstream(dir / "final_state.json")
      << session.handle({{"req", "final"}, {"type", "get_state"}}).dump() << "\n";
  return 0;
}
