#include "flutter/trace.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace flutter
{
    namespace
    {
        constexpr const char *kind_names[] = {"Send",       "Deliver",   "Propose",    "Decide",   "AppDeliver",
                                              "Broadcast",  "TimerFire", "DepPropose", "DepDecide"};

        class Reader
        {
        public:
            explicit Reader(std::string_view s) : m_s(s) {}

            [[noreturn]] void fail(const std::string &what) const
            {
                throw TraceParseError("payload '" + std::string(m_s) + "': " + what + " at offset " + std::to_string(m_pos));
            }

            void skip_ws()
            {
                while (m_pos < m_s.size() && m_s[m_pos] == ' ')
                {
                    ++m_pos;
                }
            }

            bool at_end()
            {
                skip_ws();
                return m_pos == m_s.size();
            }

            bool consume(std::string_view lit)
            {
                skip_ws();
                if (m_s.substr(m_pos, lit.size()) == lit)
                {
                    m_pos += lit.size();
                    return true;
                }
                return false;
            }

            void expect(std::string_view lit)
            {
                if (!consume(lit))
                {
                    fail("expected '" + std::string(lit) + "'");
                }
            }

            std::string_view word()
            {
                skip_ws();
                const auto start = m_pos;
                while (m_pos < m_s.size() && m_s[m_pos] != ' ' && m_s[m_pos] != ',' && m_s[m_pos] != ')' &&
                       m_s[m_pos] != '(' && m_s[m_pos] != '/')
                {
                    ++m_pos;
                }
                if (start == m_pos)
                {
                    fail("expected a word");
                }
                return m_s.substr(start, m_pos - start);
            }

            std::string_view rest()
            {
                skip_ws();
                auto r = m_s.substr(m_pos);
                m_pos = m_s.size();
                return r;
            }

            std::int64_t integer()
            {
                skip_ws();
                std::int64_t v = 0;
                const char *begin = m_s.data() + m_pos;
                const char *end = m_s.data() + m_s.size();
                auto [ptr, ec] = std::from_chars(begin, end, v);
                if (ec != std::errc{})
                {
                    fail("expected an integer");
                }
                m_pos += static_cast<std::size_t>(ptr - begin);
                return v;
            }

            SimTime time()
            {
                if (consume("-inf"))
                {
                    return SimTime::neg_infinity();
                }
                return SimTime{integer()};
            }

            Value value()
            {
                if (consume("True"))
                {
                    return Value::True;
                }
                if (consume("False"))
                {
                    return Value::False;
                }
                fail("expected True or False");
            }

            Bytes quoted()
            {
                expect("\"");
                Bytes out;
                while (true)
                {
                    if (m_pos >= m_s.size())
                    {
                        fail("unterminated string");
                    }
                    const char ch = m_s[m_pos++];
                    if (ch == '"')
                    {
                        return out;
                    }
                    if (ch != '\\')
                    {
                        out += ch;
                        continue;
                    }
                    if (m_pos >= m_s.size())
                    {
                        fail("dangling escape");
                    }
                    const char esc = m_s[m_pos++];
                    if (esc == '"' || esc == '\\')
                    {
                        out += esc;
                    }
                    else if (esc == 'x' && m_pos + 2 <= m_s.size())
                    {
                        unsigned v = 0;
                        auto [ptr, ec] = std::from_chars(m_s.data() + m_pos, m_s.data() + m_pos + 2, v, 16);
                        if (ec != std::errc{} || ptr != m_s.data() + m_pos + 2)
                        {
                            fail("bad hex escape");
                        }
                        out += static_cast<char>(v);
                        m_pos += 2;
                    }
                    else
                    {
                        fail("bad escape");
                    }
                }
            }

            ProcessId process()
            {
                ProcessId p = parse_process_label(word());
                if (m_pos < m_s.size() && m_s[m_pos] == '/')
                {
                    ++m_pos;
                    p.name = quoted();
                }
                return p;
            }

            BroadcastTuple tuple()
            {
                expect("(");
                BroadcastTuple t;
                t.client = process();
                expect(",");
                t.message = quoted();
                expect(",");
                t.bet = time();
                expect(")");
                return t;
            }

            InstanceTag tag()
            {
                if (consume("#"))
                {
                    const auto n = integer();
                    if (n < 0)
                    {
                        fail("negative instance number");
                    }
                    return InstanceTag::numbered(static_cast<std::uint64_t>(n));
                }
                return InstanceTag::of(tuple());
            }

            WireMessage message()
            {
                const auto type = word();
                if (type == "Observe")
                {
                    return wire::Observe{tuple()};
                }
                expect("(");
                WireMessage out;
                if (type == "Suggest")
                {
                    auto t = tag();
                    expect(",");
                    out = wire::Suggest{std::move(t), value()};
                }
                else if (type == "Time")
                {
                    out = wire::Time{time()};
                }
                else if (type == "Message")
                {
                    auto m = quoted();
                    expect(",");
                    out = wire::Message{std::move(m), time()};
                }
                else if (type == "Decision")
                {
                    auto m = quoted();
                    expect(",");
                    auto b = time();
                    expect(",");
                    out = wire::Decision{std::move(m), b, value()};
                }
                else
                {
                    fail("unknown message type");
                }
                expect(")");
                return out;
            }

        private:
            std::string_view m_s;
            std::size_t m_pos = 0;
        };
    }

    const char *to_string(TraceKind k) noexcept
    {
        return kind_names[static_cast<std::size_t>(k)];
    }

    std::optional<TraceKind> parse_trace_kind(std::string_view s) noexcept
    {
        for (std::size_t i = 0; i < std::size(kind_names); ++i)
        {
            if (s == kind_names[i])
            {
                return static_cast<TraceKind>(i);
            }
        }
        return std::nullopt;
    }

    std::string TraceEvent::payload() const
    {
        switch (kind)
        {
        case TraceKind::Send:
            return "to " + render_process(*peer) + " " + render(*message);
        case TraceKind::Deliver:
            return "from " + render_process(*peer) + " " + render(*message);
        case TraceKind::Propose:
        case TraceKind::DepPropose:
        case TraceKind::DepDecide:
            return render(*instance) + " " + to_string(*value);
        case TraceKind::Decide:
            return render(*instance) + " " + to_string(*value) + " " + note;
        case TraceKind::AppDeliver:
            return render_process(*peer) + " " + quote_bytes(bytes);
        case TraceKind::Broadcast:
            return quote_bytes(bytes);
        case TraceKind::TimerFire:
            return note;
        }
        return {};
    }

    ProcessId parse_process_label(std::string_view label)
    {
        if (label.size() < 2 || (label[0] != 's' && label[0] != 'c'))
        {
            throw TraceParseError("bad process label '" + std::string(label) + "'");
        }
        std::uint32_t index = 0;
        auto [ptr, ec] = std::from_chars(label.data() + 1, label.data() + label.size(), index);
        if (ec != std::errc{} || ptr != label.data() + label.size())
        {
            throw TraceParseError("bad process label '" + std::string(label) + "'");
        }
        return label[0] == 's' ? ProcessId::server(index) : ProcessId::client(index);
    }

    TraceEvent parse_event(SimTime time, const ProcessId &process, TraceKind kind, std::string_view payload)
    {
        TraceEvent e;
        e.time = time;
        e.process = process;
        e.kind = kind;
        Reader r(payload);
        switch (kind)
        {
        case TraceKind::Send:
        case TraceKind::Deliver:
            r.expect(kind == TraceKind::Send ? "to " : "from ");
            e.peer = r.process();
            e.message = r.message();
            break;
        case TraceKind::Propose:
        case TraceKind::DepPropose:
        case TraceKind::DepDecide:
            e.instance = r.tag();
            e.value = r.value();
            break;
        case TraceKind::Decide:
            e.instance = r.tag();
            e.value = r.value();
            e.note = std::string(r.word());
            break;
        case TraceKind::AppDeliver:
            e.peer = r.process();
            e.bytes = r.quoted();
            break;
        case TraceKind::Broadcast:
            e.bytes = r.quoted();
            break;
        case TraceKind::TimerFire:
            e.note = std::string(r.rest());
            break;
        }
        if (!r.at_end())
        {
            r.fail("trailing characters");
        }
        return e;
    }

    std::string to_jsonl_line(const TraceEvent &e)
    {
        nlohmann::ordered_json j;
        j["time"] = e.time.ticks;
        j["process"] = label(e.process);
        j["kind"] = to_string(e.kind);
        j["payload"] = e.payload();
        return j.dump();
    }

    void write_jsonl(std::ostream &out, const Trace &trace)
    {
        for (const auto &e : trace)
        {
            out << to_jsonl_line(e) << '\n';
        }
    }

    Trace read_jsonl(std::istream &in)
    {
        Trace trace;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            if (line.empty())
            {
                continue;
            }
            try
            {
                const auto j = nlohmann::json::parse(line);
                const auto kind = parse_trace_kind(j.at("kind").get<std::string>());
                if (!kind)
                {
                    throw TraceParseError("unknown kind");
                }
                trace.push_back(parse_event(SimTime{j.at("time").get<std::int64_t>()},
                                            parse_process_label(j.at("process").get<std::string>()), *kind,
                                            j.at("payload").get<std::string>()));
            }
            catch (const nlohmann::json::exception &ex)
            {
                throw TraceParseError("line " + std::to_string(lineno) + ": " + ex.what());
            }
            catch (const TraceParseError &ex)
            {
                throw TraceParseError("line " + std::to_string(lineno) + ": " + ex.what());
            }
        }
        return trace;
    }
}
