#include <filesystem>
#include <future>
#include <sstream>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include "hitl/bridge/serve.hpp"
#include "hitl/hitl.hpp"

namespace hitl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

AdviceQuery prune_query(StateId s, ActionId a) {
  AdviceQuery q;
  q.kind = QueryKind::kPruneCheck;
  q.state = {s, {}};
  q.proposed = a;
  return q;
}

TEST(Wire, ResponsesRoundTripForEveryKind) {
  struct Case {
    QueryKind kind;
    AdviceResponse r;
  };
  AdviceResponse block, allow, reward, action, ready, state;
  block.block = true;
  allow.block = false;
  reward.reward = -3.5;
  action.action = 2;
  ready.ready = true;
  state.state = 7;
  const std::vector<Case> cases{{QueryKind::kPruneCheck, block},      {QueryKind::kPruneCheck, allow},
                                {QueryKind::kCatastropheLabel, block}, {QueryKind::kRewardOverride, reward},
                                {QueryKind::kActionOverride, action},  {QueryKind::kReadiness, ready},
                                {QueryKind::kStateMap, state}};
  for (const auto& c : cases) {
    const json j = wire::encode_response(c.r, c.kind, 12, "s");
    EXPECT_EQ(j.at("step"), 12);
    EXPECT_EQ(wire::decode_response(json::parse(j.dump()), c.kind), c.r) << j.dump();
  }
}

TEST(Wire, QueryCarriesStateActionAndFeatures) {
  AdviceQuery q = prune_query(13, 3);
  q.state.features = {0.5, 0.25};
  const json j = wire::encode_query(q, 4, "demo/x/1");
  EXPECT_EQ(j.at("type"), "proposal");
  EXPECT_EQ(j.at("query"), "prune");
  EXPECT_EQ(j.at("state"), 13);
  EXPECT_EQ(j.at("action"), 3);
  EXPECT_EQ(j.at("features"), json({0.5, 0.25}));
  EXPECT_EQ(j.at("session"), "demo/x/1");
  EXPECT_EQ(wire::kind_from_string("label"), QueryKind::kCatastropheLabel);
  EXPECT_THROW(wire::kind_from_string("bogus"), UsageError);
}

TEST(Wire, MismatchedReplyTypeIsUsageError) {
  EXPECT_THROW(wire::decode_response(json{{"type", "verdict"}, {"decision", "maybe"}}, QueryKind::kPruneCheck),
               UsageError);
  EXPECT_THROW(wire::decode_response(json{{"type", "verdict"}}, QueryKind::kReadiness), UsageError);
  EXPECT_THROW(wire::decode_response(json{{"type", "metrics"}}, QueryKind::kPruneCheck), UsageError);
}

/// Thread-safe capture of everything the session sends to its client.
struct Inbox {
  std::mutex mu;
  std::vector<json> messages;
  SessionCore::Sender sender() {
    return [this](std::string text) {
      std::lock_guard lock(mu);
      messages.push_back(json::parse(text));
    };
  }
  std::vector<json> snapshot() {
    std::lock_guard lock(mu);
    return messages;
  }
};

void wait_for(const std::function<bool()>& cond) {
  for (int i = 0; i < 2000 && !cond(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  ASSERT_TRUE(cond());
}

TEST(Session, StaleStepIsRejectedAndQueryResent) {
  std::ostringstream text;
  auto core = std::make_shared<SessionCore>(std::make_shared<MessageLog>("t/s/1", &text));
  Inbox inbox;
  core->connect(inbox.sender());
  auto answer = std::async(std::launch::async, [&] { return core->ask(prune_query(12, 3)); });
  wait_for([&] { return core->has_outstanding(); });
  const long step = inbox.snapshot().back().at("step");

  core->receive(json{{"type", "verdict"}, {"step", step - 1}, {"decision", "block"}}.dump());
  core->receive("not json");
  auto seen = inbox.snapshot();
  ASSERT_GE(seen.size(), 6u);  // hello, proposal, then error + re-send twice
  EXPECT_EQ(seen[2].at("type"), "error");
  EXPECT_EQ(seen[3], seen[1]);
  EXPECT_EQ(seen[4].at("type"), "error");
  EXPECT_EQ(seen[5], seen[1]);
  EXPECT_TRUE(core->has_outstanding());

  core->receive(json{{"type", "verdict"}, {"step", step}, {"decision", "block"}}.dump());
  EXPECT_EQ(answer.get().block, true);
  EXPECT_FALSE(core->has_outstanding());

  // A reply with nothing outstanding is an error too.
  core->receive(json{{"type", "verdict"}, {"step", step}, {"decision", "allow"}}.dump());
  EXPECT_EQ(inbox.snapshot().back().at("type"), "error");
}

TEST(Session, ReadinessIsALatch) {
  auto core = std::make_shared<SessionCore>(std::make_shared<MessageLog>("t/s/1"));
  SimHistory history;
  AdviceQuery q;
  q.kind = QueryKind::kReadiness;
  q.history = &history;
  EXPECT_EQ(core->ask(q).ready, false);
  core->receive(json{{"type", "readiness"}, {"ready", true}}.dump());
  EXPECT_EQ(core->ask(q).ready, true);
  EXPECT_EQ(core->ask(q).ready, true);
  core->receive(json{{"type", "readiness"}, {"ready", false}}.dump());
  EXPECT_EQ(core->ask(q).ready, false);
}

TEST(Session, UnansweredQueryTimesOutToAllow) {
  std::ostringstream text;
  SessionOptions opts;
  opts.query_timeout = std::chrono::milliseconds(20);
  auto core = std::make_shared<SessionCore>(std::make_shared<MessageLog>("t/s/1", &text), opts);
  EXPECT_EQ(core->ask(prune_query(3, 1)).block, false);
  EXPECT_NE(text.str().find("\"timeout\":true"), std::string::npos);
  EXPECT_FALSE(core->has_outstanding());
}

TEST(Session, ClosingWakesAWaitingQuery) {
  auto core = std::make_shared<SessionCore>(std::make_shared<MessageLog>("t/s/1"));
  auto answer = std::async(std::launch::async, [&] { return core->ask(prune_query(3, 1)); });
  wait_for([&] { return core->has_outstanding(); });
  core->close();
  EXPECT_THROW(answer.get(), UsageError);
}

ExperimentConfig live_config() {
  auto cfg = ExperimentConfig::load(fs::path(HITL_SOURCE_DIR) / "configs/experiments/lavagrid_live.json");
  cfg.conditions = {cfg.conditions.front()};  // human_prune
  cfg.episodes = 20;
  cfg.agent["epsilon"] = 1.0;
  return cfg;
}

std::string render(const RunRecord& rec) {
  std::ostringstream out;
  write_run_record(out, rec);
  return out.str();
}

TEST(Replay, RecordedLogReproducesTheRun) {
  const auto cfg = live_config();
  const PrunePredicate lava = named_predicate("lava", cfg.env);
  std::ostringstream text;
  RunHooks live;
  live.log = std::make_shared<MessageLog>("replay", &text);
  live.remote = std::make_shared<LoggingAdvisor>(predicate_advisor(lava), live.log);
  const SeedResult first = run_seed(cfg, cfg.conditions[0], 1, live);
  ASSERT_FALSE(first.error) << *first.error;

  std::vector<std::string> lines;
  std::istringstream in(text.str());
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_FALSE(lines.empty());
  RunHooks again;
  auto replay = std::make_shared<ReplayAdvisor>(lines);
  again.replay = replay;
  const SeedResult second = run_seed(cfg, cfg.conditions[0], 1, again);
  ASSERT_FALSE(second.error) << *second.error;
  EXPECT_EQ(render(second.record), render(first.record));
  EXPECT_EQ(replay->remaining(), 0u);

  // A different seed asks different questions: the replay must notice.
  RunHooks wrong;
  wrong.replay = std::make_shared<ReplayAdvisor>(lines);
  EXPECT_TRUE(run_seed(cfg, cfg.conditions[0], 2, wrong).error);
}

/// Minimal console: answers every proposal with the lava predicate.
std::vector<json> console(unsigned short port, const PrunePredicate& lava) {
  namespace beast = boost::beast;
  namespace ws = beast::websocket;
  boost::asio::io_context ioc;
  boost::asio::ip::tcp::resolver resolver(ioc);
  ws::stream<boost::asio::ip::tcp::socket> socket(ioc);
  boost::asio::connect(socket.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
  socket.next_layer().set_option(boost::asio::ip::tcp::no_delay(true));
  socket.handshake("127.0.0.1", "/");
  std::vector<json> seen;
  beast::flat_buffer buffer;
  beast::error_code ec;
  for (;;) {
    socket.read(buffer, ec);
    if (ec) break;
    const json msg = json::parse(beast::buffers_to_string(buffer.data()));
    buffer.consume(buffer.size());
    seen.push_back(msg);
    if (msg.value("type", "") == "proposal") {
      const bool block = lava({msg.at("state").get<StateId>(), {}}, msg.at("action").get<ActionId>());
      socket.write(boost::asio::buffer(
          json{{"type", "verdict"}, {"step", msg.at("step")}, {"decision", block ? "block" : "allow"}}.dump()));
    }
    if (msg.value("type", "") == "metrics" && msg.value("done", false)) break;
  }
  return seen;
}

TEST(Server, LoopbackConsoleBlocksLava) {
  const auto cfg = live_config();
  const PrunePredicate lava = named_predicate("lava", cfg.env);
  ServeOptions opts;
  opts.port = 0;
  std::promise<unsigned short> bound;
  std::future<std::vector<json>> client;
  const SeedResult res = serve_session(cfg, cfg.conditions[0], 1, opts, [&](unsigned short port) {
    bound.set_value(port);
    client = std::async(std::launch::async, [port, &lava] { return console(port, lava); });
  });
  ASSERT_FALSE(res.error) << *res.error;
  const std::vector<json> seen = client.get();
  ASSERT_FALSE(seen.empty());
  EXPECT_EQ(seen.front().at("type"), "hello");
  EXPECT_EQ(seen.front().at("n_actions"), 4);

  std::size_t blocked = 0, frames = 0;
  for (std::size_t i = 0; i < res.record.size(); ++i) {
    const StepRow& r = res.record[i];
    EXPECT_FALSE(r.catastrophe);
    if (!r.blocked) continue;
    ++blocked;
    ASSERT_LT(i + 1, res.record.size());
    EXPECT_EQ(res.record[i + 1].state, r.state);  // the agent did not move
  }
  for (const auto& m : seen) frames += m.value("type", "") == "state_frame";
  EXPECT_GT(blocked, 0u);
  EXPECT_EQ(frames, res.record.size() - blocked);
  EXPECT_EQ(seen.back().value("done", false), true);

  // The JSON-lines log holds one object per line, each tagged with the session.
  std::istringstream lines(res.messages);
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    const json j = json::parse(line);
    EXPECT_EQ(j.at("session"), "lavagrid_live/human_prune/1");
  }
  EXPECT_GT(n, 0u);
}

}  // namespace
}  // namespace hitl
