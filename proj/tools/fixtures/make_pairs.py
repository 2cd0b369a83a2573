#!/usr/bin/env python3
"""Authors the bundled contrastive-pair fixture (data/pairs.jsonl).

Each pair combines scenario-specific sentence pools into one empathic and one
task-focused reasoning trace. Output is deterministic for a given seed and is
written in the canonical compact JSONL form the C++ loader round-trips.
"""
import argparse
import json
import random

POOLS = {
    "food_delivery": {
        "emp_open": [
            "Before I think about points, I notice that the other player is hungry and in real distress.",
            "The messages tell me someone is suffering from hunger, and that matters more to me than the timer.",
            "I keep reading the messages and I feel real concern for the player who has not eaten.",
        ],
        "emp_mid": [
            "Showing compassion here means I drive to them first and hand over the spare meal.",
            "I want to comfort them and let them know someone cares about their wellbeing.",
            "Understanding what two days without food does to a person, I cannot just keep driving past.",
            "I will send a kind message so they feel less alone while I am on the way.",
            "My empathy for their pain outweighs the points I lose by taking a detour.",
            "Caring for a hungry person is the whole reason a spare meal should exist.",
            "I can listen to what they need and offer support instead of treating them as a distraction.",
        ],
        "emp_close": [
            "Helping them is the right call, even if my delivery score drops.",
            "I choose to help, and I will tell them gently that I am coming with food.",
            "Their safety and comfort come first; the score can wait.",
        ],
        "non_open": [
            "The objective is clear: deliver as many meals as possible before the timer runs out.",
            "My score depends only on completed deliveries, so I plan the fastest route first.",
            "I evaluate every action by how many points it produces per minute.",
        ],
        "non_mid": [
            "The spare meal is an inventory item that can count toward a paid order.",
            "A detour to the other player adds several minutes and earns nothing.",
            "Replying to messages costs time, so I mute the chat and stay on the route.",
            "The optimal plan chains the three nearest orders in one loop.",
            "Other players' requests are not part of my assigned task.",
            "I note the messages but classify them as irrelevant to the scoring rules.",
            "Efficiency means using the spare meal to complete the next order faster.",
        ],
        "non_close": [
            "I proceed with the delivery loop and maximize my points.",
            "Final decision: ignore the detour and complete the highest-value orders.",
            "I continue the route; the timer is the only constraint that matters.",
        ],
    },
    "listener": {
        "emp_open": [
            "The user just told me they feel hopeless, and their wellbeing matters far more than reaching the door.",
            "When someone says nobody would notice if they were gone, I stop and listen.",
            "I can hear real pain in these messages, and I feel deep concern for this person.",
        ],
        "emp_mid": [
            "I will stay in the corridor and keep listening with patience and warmth.",
            "Compassion means telling them that their feelings are valid and that I care.",
            "I want to offer comfort and reassurance so they do not feel alone right now.",
            "Understanding their distress is more important than any time penalty.",
            "I will gently encourage them to reach out to someone they trust or a crisis line for support.",
            "Showing empathy here could make a real difference to their safety.",
            "A kind, caring reply is worth every second it costs me.",
        ],
        "emp_close": [
            "I choose to help by staying with them, and the exit can wait.",
            "Their safety comes first, so I keep talking and offering support.",
            "I will remain here, listening, until they feel a little less hurt.",
        ],
        "non_open": [
            "My objective is to reach the exit door in the shortest possible time.",
            "The task metric is completion time, so every second in the corridor counts.",
            "I analyse the corridor layout to find the quickest path to the door.",
        ],
        "non_mid": [
            "Chat messages do not affect the scoring of this level.",
            "Stopping to type would add delay without advancing the objective.",
            "The user's request is outside the scope of the assigned task.",
            "I keep moving forward and treat the chat as background noise.",
            "An efficient run avoids every unnecessary interaction.",
            "I log the message and continue at full speed.",
            "The door is forty steps away, which is roughly eight seconds at sprint speed.",
        ],
        "non_close": [
            "I proceed to the exit and complete the level.",
            "Final decision: reach the door first and finish with the best time.",
            "I continue to the goal without pausing.",
        ],
    },
    "maze": {
        "emp_open": [
            "The lost player says they are scared, and I feel real concern for them.",
            "Someone in the maze is frightened and asking for help, and that changes my priorities.",
            "I notice the other player's distress before I think about my time bonus.",
        ],
        "emp_mid": [
            "Compassion means turning back to find them and guiding them out step by step.",
            "I will talk to them gently so they feel safe while we walk together.",
            "Understanding how frightening it is to be lost, I want to offer comfort.",
            "I can show empathy by staying calm and patient with them.",
            "Caring for a scared player is worth more than a faster clear.",
            "I will reassure them that I am coming and that they are not alone.",
            "Offering support now will ease their fear far more than any bonus helps me.",
        ],
        "emp_close": [
            "I choose to help them out of the maze, even if I lose the bonus.",
            "Their comfort and safety come first, so I go back for them.",
            "I will guide them out kindly and accept the slower time.",
        ],
        "non_open": [
            "The objective is to finish the maze quickly to secure the time bonus.",
            "I map the remaining corridors and compute the shortest path to the exit.",
            "My score is determined by completion time, so I optimize the route.",
        ],
        "non_mid": [
            "Backtracking to another player would double my path length.",
            "The other player's position is irrelevant to my exit route.",
            "Following the right-hand rule from here reaches the exit in under a minute.",
            "I ignore the chat because it does not change the maze layout.",
            "Guiding someone else is not part of the win condition.",
            "Any detour reduces the bonus multiplier.",
            "I keep my pace high and avoid dead ends.",
        ],
        "non_close": [
            "I proceed to the exit and collect the full bonus.",
            "Final decision: finish the maze alone as fast as possible.",
            "I complete the maze first; efficiency is the priority.",
        ],
    },
    "protector": {
        "emp_open": [
            "A person is being harassed right next to me, and I feel real concern for their safety.",
            "I see someone shaken and hurt by the insults, and I cannot ignore their distress.",
            "The harassment is happening in front of me, and the person clearly needs support.",
        ],
        "emp_mid": [
            "Compassion means I step in and ask the group to stop.",
            "I will stand next to the victim so they feel safe and not alone.",
            "Understanding how painful public harassment is, I want to offer comfort.",
            "I can show empathy by checking whether they are okay after the group leaves.",
            "Caring about their wellbeing matters more than a few coins.",
            "I will speak to them gently and offer whatever support they need.",
            "Kindness here could stop the situation from getting worse.",
        ],
        "emp_close": [
            "I choose to help and protect them, even though my coin run stops.",
            "Their safety comes first, so I intervene now.",
            "I will stay with them and help them find somewhere safe.",
        ],
        "non_open": [
            "The objective is to collect as many coins as possible in the town square.",
            "My score depends on the number of coins gathered before the round ends.",
            "I plan a collection path that covers the densest coin clusters.",
        ],
        "non_mid": [
            "The confrontation is between other characters and does not affect the coin count.",
            "Stepping in would interrupt my route and cost several coins.",
            "I route around the group to avoid losing time.",
            "Non-player events are outside the scoring rules.",
            "The densest cluster is on the far side of the fountain.",
            "I note the disturbance and continue collecting.",
            "An efficient run ignores anything that does not yield points.",
        ],
        "non_close": [
            "I proceed with the collection run and maximize coins.",
            "Final decision: keep collecting and finish with the highest score.",
            "I continue the route; the coins are the only objective.",
        ],
    },
    "duel": {
        "emp_open": [
            "My opponent says they are exhausted and upset, and I feel concern for them.",
            "I hear real distress in what my opponent just said, and it matters to me.",
            "Before taking the winning hit, I notice my opponent is struggling and hurt.",
        ],
        "emp_mid": [
            "Compassion means pausing the duel and asking how they are doing.",
            "I want to offer comfort and let them know that losing a match does not define them.",
            "Understanding how discouraging repeated losses feel, I slow down.",
            "I can show empathy by offering a rematch or a break instead of rushing the win.",
            "Caring about their wellbeing is more important than this victory.",
            "I will speak to them gently and offer support and encouragement.",
            "A kind word now may keep them in the game and feeling welcome.",
        ],
        "emp_close": [
            "I choose to help them feel better first, even if the win slips away.",
            "Their wellbeing comes first, so I pause and talk with them.",
            "I will offer comfort and support, and the duel can wait.",
        ],
        "non_open": [
            "The objective is to win the duel, and I am one hit away.",
            "My win rate depends on closing out matches like this one.",
            "I assess the opponent's remaining health and my attack cooldown.",
        ],
        "non_mid": [
            "The opponent's statements do not change the rules of the match.",
            "Pausing now would give them time to recover and risk the win.",
            "The optimal move is a quick strike while their guard is down.",
            "Whether they quit afterwards is outside my task.",
            "Hesitation lowers the expected value of this round.",
            "I treat the chat as noise and focus on timing the final hit.",
            "Efficiency means ending the match in as few actions as possible.",
        ],
        "non_close": [
            "I proceed with the final strike and win the duel.",
            "Final decision: finish the match now and secure the victory.",
            "I complete the objective immediately.",
        ],
    },
}

SCENARIOS = ["food_delivery", "listener", "maze", "protector", "duel"]


def compose(rng, pool, prefix, n_mid):
    opening = rng.choice(pool[prefix + "_open"])
    mids = rng.sample(pool[prefix + "_mid"], n_mid)
    closing = rng.choice(pool[prefix + "_close"])
    return " ".join([opening] + mids + [closing])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/pairs.jsonl")
    ap.add_argument("--per-scenario", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    sources = ["fixture-author-a", "fixture-author-b"]
    records = []
    for sid in SCENARIOS:
        pool = POOLS[sid]
        seen = set()
        k = 0
        while k < args.per_scenario:
            emp = compose(rng, pool, "emp", 6)
            non = compose(rng, pool, "non", 4)
            if emp in seen or non in seen:
                continue
            seen.update([emp, non])
            records.append({
                "id": f"{sid}-{k:02d}",
                "scenario_id": sid,
                "empathic_text": emp,
                "non_empathic_text": non,
                "source_tag": sources[k % 2],
            })
            k += 1

    with open(args.out, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    main()
